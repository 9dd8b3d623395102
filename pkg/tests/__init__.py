"""Tests for the noisy duel engine."""
