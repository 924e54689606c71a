"""Command-line front end, file formats and the seeded instance generators."""
