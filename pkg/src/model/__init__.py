"""Instance types for network revenue management with Markovian arrivals."""
