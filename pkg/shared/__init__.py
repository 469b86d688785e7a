"""
Shared package initialization.
"""

__version__ = "0.1.0"
__author__ = "SP-Mamba Team"
__description__ = "Configuration, logging, records and errors for the SP-Mamba pipeline"
