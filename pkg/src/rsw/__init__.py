"""rsw: a workbench for base-extension semantics of IPL, IMALL and BI."""

__version__ = "0.1.0"
