"""ETL for raw EHR exports: loading, shift labeling, filtering and encoding."""
