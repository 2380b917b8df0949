"""Cross-layer intrusion detection for industrial control systems.

Fuses Zeek ``conn.log``/``cip.log`` records with process-variable data on a
one-second axis and compares classifiers trained on network-only,
process-only and combined features.
"""

__version__ = "0.1.0"
