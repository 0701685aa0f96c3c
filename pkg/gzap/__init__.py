"""gzap: zero-shot arbitrary-scale pansharpening on a small numpy autodiff engine."""

__version__ = "1.0.0"
