# Seeded instance generation
