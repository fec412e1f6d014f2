"""
관절 물체 추정 툴킷
"""

__version__ = "0.1.0"
