"""Shared configuration, errors, seeding and Hub helpers."""
