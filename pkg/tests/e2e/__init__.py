"""End-to-end tests for fleet-routing."""
