# src/__init__.py
# circuitq sources: the core library and the built-in design cases.
