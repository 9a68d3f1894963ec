"""Smart-sportswear strain pipeline: simulation, device link, preprocessing,
classification and analysis."""

__version__ = "0.1.0"
