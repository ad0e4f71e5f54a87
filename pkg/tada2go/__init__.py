"""Development-pipeline emulation for JPEG steganalysis under cover-source mismatch."""
