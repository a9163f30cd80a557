# Text rendering of report documents
