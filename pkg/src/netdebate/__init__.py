"""Multi-agent question-answering debate on network topologies."""

__version__ = "0.1.0"
