# Workbench source package
