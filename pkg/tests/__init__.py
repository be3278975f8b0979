"""Tests for hemq."""
