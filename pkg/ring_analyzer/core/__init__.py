"""Analysis services and ambient infrastructure."""
