"""Domain layer: entities and use cases."""
