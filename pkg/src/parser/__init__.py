# Instance file parsing and serialization
