"""Tests package for oscsym."""
