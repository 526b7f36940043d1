"""Deterministic in-town ambulance dispatch simulator.

Subpackages cover the road network and routing, signal-priority
controllers, dispatch policy, image-based ambulance recognition, the
fixed-step simulation engine, and a small CLI / HTTP gateway.
"""

__version__ = "0.1.0"
