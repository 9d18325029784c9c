# Shared utilities and helpers
