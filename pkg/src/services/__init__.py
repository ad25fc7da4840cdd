"""Services package initialization file."""
