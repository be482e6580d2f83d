"""
Module core - Contient la logique principale de l'application
"""
