"""Test suite for fleet-routing."""
