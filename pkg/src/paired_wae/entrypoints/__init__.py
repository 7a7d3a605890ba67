"""Entrypoints package for the paired WAE application."""
