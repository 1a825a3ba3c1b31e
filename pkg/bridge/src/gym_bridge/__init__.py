"""Line-protocol bridge exposing reference control environments over stdio."""

__version__ = "0.1.0"
