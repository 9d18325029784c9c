# Click commands, registered on the group in app/main.py
