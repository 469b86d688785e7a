"""
SP-Mamba - spatial-perception state space anomaly detection at desk scale.
"""

__version__ = "0.1.0"
__author__ = "SP-Mamba Team"
__license__ = "MIT"
