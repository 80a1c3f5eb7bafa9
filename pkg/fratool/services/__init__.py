from . import commands, reporting

__all__ = ["commands", "reporting"]
