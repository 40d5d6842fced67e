"""Video quality assessment over IP networks.

Encode raw video with a GOP-structured toy codec, stream it over RTP through
a seeded lossy channel, capture the trace, and compute QoS, bitstream and
picture-quality metrics offline.
"""

__version__ = "0.1.0"
