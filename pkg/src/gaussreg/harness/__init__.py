"""Verification harness: checks, suites and the row format they report in."""
