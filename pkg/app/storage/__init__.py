"""
Lecture et écriture des fichiers (configuration, CSV) et cache des tables
"""
