"""Command implementations: prepare, train, synthesize, edit, evaluate."""
