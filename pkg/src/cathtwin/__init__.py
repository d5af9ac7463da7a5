"""cathtwin: digital-twin simulator and co-piloted control stack for
robotic transcatheter tricuspid valve replacement."""

__version__ = "0.1.0"
