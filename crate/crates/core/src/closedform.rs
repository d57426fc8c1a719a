// closedform: implemented next
