# cosmoweyl: double-null geometry and Weyl field decay checks for (Schwarzschild-)de Sitter

__version__ = "v0.1.0"
