# src/examples/__init__.py
# Built-in design cases, one subpackage per circuit family.
