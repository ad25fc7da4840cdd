"""Raw EHR CSV loading."""
