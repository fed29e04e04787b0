"""Tests for odegrad."""
