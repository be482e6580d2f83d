"""
Module services - Contient les services métier
"""
