"""Unit tests for fleet-routing."""
