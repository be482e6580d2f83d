"""
BESS Setpoint Projector - Projection des consignes de puissance d'un stockage par batterie
"""

__version__ = '0.1.0'
