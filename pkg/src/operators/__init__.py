"""Numerical core of oscsym: symbols, operators, calculus and spectral constructions."""
