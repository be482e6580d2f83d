"""
Module cli - Commandes de la ligne de commande
"""
