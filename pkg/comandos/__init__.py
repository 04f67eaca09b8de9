# Inicialização do pacote comandos
