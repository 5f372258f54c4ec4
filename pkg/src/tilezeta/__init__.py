"""Weighted substitutions, their tilings, orbit counts and zeta functions."""
