"""NTK Spectra - limiting eigenvalue densities of two-layer NTK Gram matrices"""

__version__ = "0.1.0"
