"""Control-tutored Q-learning for planar herding."""

__version__ = "0.1.0"
