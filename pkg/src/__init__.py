"""Fockloop - Source Package."""
