"""Tests package for Fockloop."""
