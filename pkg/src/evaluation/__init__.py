"""Objective metrics and report writing."""
