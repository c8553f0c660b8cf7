"""Open-system dynamics of one and two qubits in thermal baths, and quantum
Fisher information for bath thermometry."""

__version__ = "0.1.0"
