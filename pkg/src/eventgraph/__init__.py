"""Multi-entity event graphs and directly-follows discovery."""
