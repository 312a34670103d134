"""CLI, HTTP service, and persistent session storage tying the lab together."""
