"""Tests for Invariant OSC."""
