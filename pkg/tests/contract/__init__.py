# Contract tests package
