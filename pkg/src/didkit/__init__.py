"""Content-based deep intrusion detection: pcap flows to enriched matrices to
an LSTM classifier, all in numpy."""

__version__ = "0.1.0"
