# src/core/__init__.py
# Circuit quantization core: netlists, energy models, spectra, dynamics, dissipation.
__version__ = "0.1.0"
