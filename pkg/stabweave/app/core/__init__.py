"""Core utilities for the stitching service."""

SERVICE_NAME = "stabweave"
