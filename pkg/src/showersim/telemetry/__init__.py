"""Channel-based telemetry service: keyed channels, sequenced entries, HTTP API."""
