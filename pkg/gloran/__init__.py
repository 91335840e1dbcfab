"""gloran - LSM-tree key-value store with global range deletes"""

__version__ = "0.1.0"
